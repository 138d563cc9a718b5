import numpy as np
import pytest

from conftest import covered_by_triangles
from checks.kinematics import (
    arm_links,
    elbow_position,
    l_bal,
    l_leg,
    l_pay,
    l_rob,
    sweep_poses,
)
from checks.modules import CheckKey, PrecomputationUnsupported, enumerate_input_space
from domains.locomotion import BalanceCheck, LegReachCheck, LocomotionInstance, initial_state
from domains.locomotion import build_schemas as locomotion_schemas
from domains.manipulation import ArmCollisionCheck, ManipulationInstance, PayloadCheck
from planning.model import ActionInstance, Fluent, State, apply

BASE1 = (-0.5, 2.5)
BASE2 = (4.5, 2.5)


def test_balance_on_support_boundary():
    square = [(0, 0), (2, 0), (2, 2), (0, 2)]
    assert l_bal(square, (1, 1))
    assert l_bal(square, (2, 1))
    assert not l_bal(square, (3, 1))
    assert l_bal([(0, 0), (2, 0), (0, 2)], (1, 1))
    assert not l_bal([(0, 0), (2, 0), (0, 2)], (1, 2))


def test_balance_matches_triangle_oracle():
    rng = np.random.default_rng(21)
    inside = 0
    for _ in range(1000):
        n = int(rng.integers(2, 5))
        legs = [tuple(int(v) for v in p) for p in rng.integers(0, 5, size=(n, 2))]
        cm = tuple(int(v) for v in rng.integers(-1, 6, size=2))
        expected = covered_by_triangles(cm, legs)
        assert l_bal(legs, cm) == expected, (legs, cm)
        inside += expected
    assert 0 < inside < 1000


def test_leg_reach_is_inclusive():
    assert l_leg((1, 2), (0, 0), 2.5)
    assert not l_leg((2, 2), (0, 0), 2.5)
    assert l_leg((3, 4), (0, 0), 5.0)


def test_sweep_includes_both_poses():
    poses = sweep_poses(((0.5, 0.5), (1.5, 0.5)), ((0.5, 2.5), (1.5, 2.5)), samples=8)
    assert len(poses) == 10
    assert poses[0] == ((0.5, 0.5), (1.5, 0.5))
    assert poses[-1] == ((0.5, 2.5), (1.5, 2.5))
    assert len(sweep_poses(((0, 0), (1, 0)), ((0, 0), (1, 0)))) == 1


def test_payload_static_and_swept():
    start = ((0.5, 0.5), (1.5, 0.5))
    end = ((0.5, 2.5), (1.5, 2.5))
    assert l_pay(end, end, [(0, 1)])
    assert not l_pay(start, end, [(0, 1)])
    rod = ((1.5, 1.5), (3.5, 1.5))
    assert not l_pay(rod, rod, [(2, 1)])
    assert l_pay(start, end, [])


def test_swinging_rod_hits_cell_only_between_poses():
    # the rod turns about (3.5, 3.5); its right end sweeps past cell (6, 4)
    level = ((0.5, 3.5), (6.5, 3.5))
    diagonal = ((0.5, 0.5), (6.5, 6.5))
    obstacle = [(6, 4)]
    assert l_pay(level, level, obstacle)
    assert l_pay(diagonal, diagonal, obstacle)
    assert not l_pay(level, diagonal, obstacle, samples=1024)
    assert not l_pay(level, diagonal, obstacle)
    assert l_pay(level, diagonal, [(6, 0), (0, 5)], samples=1024)
    assert l_pay(level, diagonal, [(6, 0), (0, 5)])


def test_elbow_up_is_the_higher_solution():
    elbow = elbow_position(BASE1, (1.5, 1.5), 2.5)
    assert elbow.x == pytest.approx(1.5)
    assert elbow.y == pytest.approx(4.0)
    assert elbow_position(BASE1, (10.0, 2.5), 2.5) is None
    assert arm_links(BASE1, (10.0, 2.5), 2.5) is None


def test_mirrored_arms_stay_apart():
    assert l_rob((1.5, 1.5), (2.5, 1.5), BASE1, BASE2, 2.5)
    assert l_rob((1.5, 2.5), (2.5, 2.5), BASE1, BASE2, 2.5)


def test_crossed_grips_collide():
    assert not l_rob((2.5, 1.5), (1.5, 1.5), BASE1, BASE2, 2.5)


def test_unreachable_grip_fails():
    assert not l_rob((1.5, 1.5), (2.5, 1.5), BASE1, BASE2, 0.5)


@pytest.fixture
def square_robot():
    return LocomotionInstance(
        grid=4, legs=((0, 0, True), (2, 0, True), (0, 2, True), (2, 2, True)),
        cm=(1, 1), goal=(2, 1),
    )


def test_balance_keys_cover_both_cm_positions(square_robot):
    module = BalanceCheck(square_robot)
    before = initial_state(square_robot)
    step = frozenset([ActionInstance("detach", (4,)), ActionInstance("move_cm", (2, 1))])
    after = apply(before, step, locomotion_schemas(square_robot))
    keys = module.extract_keys(before, step, after)
    assert keys == {
        module.encode((1, 1), [(0, 0), (2, 0), (0, 2)]),
        module.encode((2, 1), [(0, 0), (2, 0), (0, 2)]),
    }
    verdicts = {module.decode(k)[0]: module.check(k) for k in keys}
    assert verdicts == {(1, 1): True, (2, 1): False}


def test_balance_blame_pins_unchanged_legs(square_robot):
    module = BalanceCheck(square_robot)
    before = initial_state(square_robot)
    step = frozenset([ActionInstance("detach", (4,)), ActionInstance("move_cm", (2, 1))])
    after = apply(before, step, locomotion_schemas(square_robot))
    bad = module.encode((2, 1), [(0, 0), (2, 0), (0, 2)])
    constraint = module.blame(bad, before, step, after)
    assert constraint.forbidden == step
    assert Fluent("cm_at", (1, 1)) in constraint.context
    assert Fluent("leg_at", (1, 0, 0)) in constraint.context
    assert not any(f.args[:1] == (4,) for f in constraint.context if f.name in ("leg_at", "attached"))
    assert constraint.violated_by(before, step)


def test_leg_reach_input_space(square_robot):
    module = LegReachCheck(square_robot)
    keys = list(enumerate_input_space(module))
    assert len(keys) == module.input_space_size() == 4 ** 4
    assert module.dedicated_table() == {k: module.check(k) for k in keys}


def test_leg_reach_input_space_at_default_grid():
    instance = LocomotionInstance(legs=((0, 0, True), (2, 0, True), (0, 2, True), (2, 2, True)),
                                  cm=(1, 1), goal=(2, 1))
    assert LegReachCheck(instance).input_space_size() == 10000


def test_balance_is_not_precomputable(square_robot):
    module = BalanceCheck(square_robot)
    assert not module.precomputable
    with pytest.raises(PrecomputationUnsupported):
        enumerate_input_space(module)


def test_manipulation_input_spaces(full_manipulation):
    pay = PayloadCheck(full_manipulation)
    rob = ArmCollisionCheck(full_manipulation)
    assert pay.input_space_size() + rob.input_space_size() == 29282
    swept = PayloadCheck(full_manipulation.model_copy(update={"swept": True}))
    assert not swept.precomputable


def test_arm_dedicated_table_matches_checks():
    instance = ManipulationInstance(grid=4, payloads=((1, 1, 2, 1),), goal=((1, 2, 2, 2),), link_len=2.5)
    module = ArmCollisionCheck(instance)
    table = module.dedicated_table()
    assert len(table) == 256
    assert table == {k: module.check(k) for k in module.input_space()}
    assert table[CheckKey("L_rob", (1, 1, 2, 1))]
    assert not table[CheckKey("L_rob", (2, 1, 1, 1))]


def test_swept_payload_keys_carry_the_source_pose():
    instance = ManipulationInstance(grid=4, payloads=((0, 0, 1, 0),), goal=((0, 2, 1, 2),),
                                    obstacles=((0, 1),), swept=True, link_len=2.5)
    module = PayloadCheck(instance)
    before = State.of([Fluent("endpoint_at", (1, 0, 0, 0)), Fluent("endpoint_at", (1, 1, 1, 0)),
                       Fluent("carried", (1,))])
    move = ActionInstance("move_payload", (1, 0, 1, 1, 1))
    keys = module.extract_keys(before, [move], before)
    assert keys == {module.key(0, 0, 1, 0, 0, 1, 1, 1)}
    assert not module.check(next(iter(keys)))
