"""Exercise the raydar Python module end to end on a bundled scene.

Build first, e.g. `maturin develop -m crates/py/Cargo.toml --release`.
"""

import json
import math

import raydar


def main():
    scene = raydar.Scene.bundled("cubicle")
    assert scene.grid_shape == (42, 18), scene.grid_shape
    assert scene.transmitter_ids == ["ap"]
    print(scene)

    # JSON round trip keeps the scene intact
    again = raydar.Scene.from_json(scene.to_json())
    assert again.to_json() == scene.to_json()

    dynamic = scene.with_overlay()
    assert "person-1" in dynamic.object_ids

    tracer = raydar.Tracer(scene)
    paths = tracer.paths(0.0, 0.0, 1.0)
    assert paths and paths[0].n_reflections == 0
    los = paths[0]
    friis = tracer.wavelength / (4 * math.pi * los.length)
    assert abs(math.hypot(los.theta_re, los.theta_im) - friis) <= 1e-12 * friis
    print(f"{len(paths)} paths to (0, 0, 1); first {los}")

    cov = raydar.coverage(scene, workers=1)
    rows = cov.dataset()
    assert len(rows) == 42 * 18 and len(rows[0]) == 10
    assert len(cov.dataset_csv().splitlines()) == 757
    print(f"dead fraction {cov.dead_fraction:.4f}")

    env = raydar.NavEnv(scene, cov)
    start, target = env.cell_at(-8.0, -9.0), env.cell_at(17.0, 8.0)
    assert env.shortest_path(start, target) == 42
    state = env.reset(start, target)
    assert len(state) == 10
    _, r, done, collided = env.step("x+")
    assert not done and not collided and r < 0

    assert raydar.reward((3, 4), (0, 0)) == -25.0
    assert raydar.reward((0, 0), (0, 0)) == 5000.0

    config = json.dumps({"max_steps": 200})
    policy = raydar.train(env, start, target, episodes=2, seed=1, config=config)
    assert len(policy.episodes) == 2
    restored = raydar.Policy.from_json(policy.to_json())
    assert restored.q_values(state) == policy.q_values(state)
    traj = restored.infer(env, start, target, max_steps=50)
    assert traj.cells[0] == start and traj.steps <= 50
    print(traj)
    print("smoke test passed")


if __name__ == "__main__":
    main()
