import pytest

from cslab import Cslab, HooksConfig, DEFAULT_HOOKS
from cslab.lifecycle import COMMANDS, LifeCycle, stages_for


def test_lifecycle_ordering():
    assert LifeCycle.config_model < LifeCycle.load_config < LifeCycle.save
    assert LifeCycle.teardown > LifeCycle.save
    assert max([LifeCycle.surface, LifeCycle.load]) == LifeCycle.surface


@pytest.mark.parametrize(
    "commands, stages",
    [
        (["hypotheses"], {"hypotheses"}),
        (["classify"], {"fixed_points", "classify"}),
        (["cone"], {"fixed_points", "classify", "surface", "cone"}),
        (["simplex", "sweep"], {"surface", "sweep"}),
    ],
)
def test_stages_for(commands, stages):
    assert stages_for(commands) == stages


def test_every_command_has_stages():
    assert set(COMMANDS) == {
        "hypotheses",
        "fixed-points",
        "simplex",
        "classify",
        "convexity",
        "cone",
        "separation",
        "sweep",
    }


def test_hooks_expand_default():
    conf = HooksConfig(hooks=["my.plugin", "default"], disabled_hooks=["cslab.plugins.pyinstrument"])
    hooks = conf.expanded()
    assert hooks[0] == "my.plugin"
    assert "cslab.plugins.pyinstrument" not in hooks
    assert len(hooks) == len(DEFAULT_HOOKS)


def test_hooks_without_default():
    assert HooksConfig(hooks=["a", "b"], disabled_hooks=["b"]).expanded() == ["a"]


def test_unknown_target():
    with pytest.raises(ValueError):
        Cslab(targets=["nope"])


def test_config_is_lazy(in_tmp):
    m = Cslab()
    assert "config" not in m.__dict__
    assert m.config.grid.level == 32
    assert "load_config" in m.stages_ran
    assert "surface" not in m.stages_ran


def test_unproduced_attr(in_tmp):
    m = Cslab()
    with pytest.raises(AttributeError):
        m.classification


def test_make_hash_is_stable(in_tmp):
    m = Cslab()
    assert m.make_hash("a", 1) == m.make_hash("a", 1)
    assert m.make_hash("a", 1) != m.make_hash("a", 2)
