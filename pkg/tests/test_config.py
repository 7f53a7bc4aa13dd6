import pytest

from compwave.config import ConfigError, RunConfig, format_config, from_dict, load_config


def test_round_trip(tmp_path):
    cfg = RunConfig(d=2, U_minus=(1.0, 0.0, 0.0), N2=16, mode=1.0, snapshots=(1.0, 2.5), seed=7).validate()
    p = tmp_path / "c.ini"
    p.write_text(format_config(cfg))
    assert load_config(p) == cfg


def test_defaults_round_trip(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text(format_config(RunConfig()))
    assert load_config(p) == RunConfig()


def test_partial_file_keeps_defaults(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text("[grid]\nN1 = 512  # fewer cells\n[model]\nname = burgers\nU_minus = 1\n")
    cfg = load_config(p)
    assert cfg.N1 == 512 and cfg.model == "burgers" and cfg.U_minus == (1.0,)
    assert cfg.T_end == RunConfig().T_end


@pytest.mark.parametrize(
    "text",
    [
        "[grid]\nwidth = 3\n",
        "[mesh]\nN1 = 3\n",
        "[grid]\nN1 = many\n",
        "[waves]\nkind = shock-vortex\n",
        "[model]\nd = 3\nU_minus = 1 0 0 0\n",
        "[time]\ncfl_hyp = 1.5\n",
        "not an ini file",
    ],
)
def test_bad_files(tmp_path, text):
    p = tmp_path / "c.ini"
    p.write_text(text)
    with pytest.raises(ConfigError):
        load_config(p)


def test_from_dict_validates():
    with pytest.raises(ConfigError):
        from_dict({"model.U_minus": "1 0 0"})
    assert from_dict({"perturbation.seed": "3"}).seed == 3
