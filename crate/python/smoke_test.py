"""Smoke test for the keyframe_entropy Python module.

Build and install the extension first:

    pip install maturin
    maturin build --release -m crates/python/Cargo.toml
    pip install target/wheels/keyframe_entropy-*.whl

then run ``python python/smoke_test.py``.
"""

import os
import random
import tempfile

import keyframe_entropy as kf


def check_primitives():
    f = kf.Frame(2, 2, bytes([0, 0, 255, 255]))
    assert kf.histogram(f)[0] == 2
    assert kf.entropy(f) == 1.0
    assert kf.modified_entropy(7.99) == 64

    rng = random.Random(1)
    a = kf.Frame(32, 32, bytes(rng.randrange(256) for _ in range(1024)))
    b = kf.Frame(32, 32, bytes(255 - p for p in a.pixels))
    assert abs(kf.correlation(a, b) + 1.0) < 1e-12
    assert kf.dissimilarity(kf.segmented_entropies(a), kf.segmented_entropies(a)) == 0.0
    print("primitives ok")


def check_pipeline(root):
    layout = kf.generate_synthetic(os.path.join(root, "video"), format="y4m",
                                   scenes=3, frames_per_scene=120, width=160, height=120)
    report = kf.run_pipeline(os.path.join(root, "video", "video.y4m"), "y4m",
                             os.path.join(root, "out"))
    starts = [s["start"] for s in report["shots"]]
    planted = [seg["fade_start"] for seg in layout["segments"]]
    assert starts == planted, (starts, planted)
    assert all(e["sd"] == 0.0 for e in report["eliminations"])
    print(f"pipeline ok: {report['total_frames']} frames, shots at {starts}, "
          f"{len(report['keyframes'])} key-frames, {len(report['eliminations'])} duplicates dropped")

    try:
        kf.run_pipeline(os.path.join(root, "nope.y4m"), "y4m", os.path.join(root, "out2"))
    except kf.KeyframeError as err:
        message, code = err.args
        assert code == 3, err.args
    else:
        raise AssertionError("missing input was accepted")


if __name__ == "__main__":
    check_primitives()
    with tempfile.TemporaryDirectory() as tmp:
        check_pipeline(tmp)
    print("smoke test passed")
