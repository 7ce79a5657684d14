//! Exercises the Python surface through an embedded interpreter.

use std::ffi::CString;

use pyo3::prelude::*;
use pyo3::types::{PyDict, PyModule};

fn with_module(script: &str) {
    Python::initialize();
    Python::attach(|py| {
        let module = PyModule::new(py, "keyframe_entropy").unwrap();
        keyframe_entropy_py::keyframe_entropy_py(&module).unwrap();
        let globals = PyDict::new(py);
        globals.set_item("kf", module).unwrap();
        let code = CString::new(script).unwrap();
        if let Err(err) = py.run(&code, Some(&globals), None) {
            err.print(py);
            panic!("python snippet failed");
        }
    });
}

#[test]
fn frame_and_entropy() {
    with_module(
        r#"
f = kf.Frame(2, 2, bytes([0, 0, 255, 255]))
assert (f.width, f.height, f.index) == (2, 2, 0)
assert f.pixels == bytes([0, 0, 255, 255])
h = kf.histogram(f)
assert len(h) == 256 and h[0] == 2 and h[255] == 2
assert kf.entropy(f) == 1.0
assert kf.modified_entropy(2.3) == 5
assert kf.to_grayscale(255, 0, 0) == 76
rgb = kf.Frame.from_rgb(1, 1, bytes([0, 255, 0]))
assert rgb.pixels == bytes([150])
try:
    kf.Frame(3, 3, bytes(8))
    raise AssertionError("size mismatch accepted")
except ValueError:
    pass
"#,
    );
}

#[test]
fn segments_and_dissimilarity() {
    with_module(
        r#"
pixels = bytearray(16 * 16)
pixels[4 * 16 + 10] = 255
pixels[5 * 16 + 10] = 255
f = kf.Frame(16, 16, bytes(pixels))
seg = kf.segmented_entropies(f)
assert len(seg) == 64
assert seg[2 * 8 + 5] == 1.0 and sum(seg) == 1.0
d = kf.dissimilarity([0.0] * 64, seg)
assert abs(d - 0.12402) < 1e-5
try:
    kf.segmented_entropies(kf.Frame(4, 4, bytes(16)))
    raise AssertionError("4x4 frame segmented")
except ValueError:
    pass
"#,
    );
}

#[test]
fn shots_bins_and_dedup() {
    with_module(
        r#"
import random
rng = random.Random(3)
a = bytes(rng.randrange(256) for _ in range(32 * 32))
b = bytes(rng.randrange(256) for _ in range(32 * 32))
frames = [kf.Frame(32, 32, a if i < 50 else b, i) for i in range(100)]
assert abs(kf.correlation(frames[0], frames[1]) - 1.0) < 1e-12
assert kf.detect_cuts(frames) == [(0, 50), (50, 100)]
assert kf.merge_short_shots([(0, 40), (40, 44), (44, 48), (48, 90)], 10) == [(0, 40), (40, 90)]
bins = kf.bin_frames(frames[:50])
assert len(bins) == 1 and bins[0][1] == list(range(50))
assert kf.select_keyframes(frames[:50]) == [25]
seg = kf.segmented_entropies(frames[0])
survivors, dropped = kf.dedup([(10, seg), (3, seg)])
assert survivors == [3] and dropped == [(10, 3, 0.0)]
"#,
    );
}

#[test]
fn evaluation_helpers() {
    with_module(
        r#"
m = kf.match_keyframes([95, 104], [100], 200, 12)
assert m["pairs"] == [[100, 104]] and m["unmatched_detected"] == [95]
r = kf.evaluate([98, 200, 310, 311], [100, 300, 500], 1000)
assert (r["identified"], r["redundant"], r["missing"]) == (4, 2, 1)
assert r["compactness"] == 0.004
try:
    kf.evaluate([1], [], 10)
    raise AssertionError("empty ground truth accepted")
except ValueError:
    pass
"#,
    );
}

#[test]
fn pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().display().to_string();
    with_module(&format!(
        r#"
import os
root = {root:?}
layout = kf.generate_synthetic(os.path.join(root, "v"), format="raw", scenes=2,
                               frames_per_scene=40, width=64, height=48)
assert layout["total_frames"] == 128
report = kf.run_pipeline(os.path.join(root, "v", "video.raw"), "raw", os.path.join(root, "out"),
                         width=64, height=48)
assert [s["start"] for s in report["shots"]] == [0, 40, 84]
assert report["eliminations"] and report["eliminations"][0]["sd"] == 0.0
for k in report["keyframes"]:
    assert os.path.exists(os.path.join(root, "out", k["image"]))
frames = kf.synthetic_frames(scenes=2, frames_per_scene=40, width=64, height=48)
assert len(frames) == 128
try:
    kf.run_pipeline(os.path.join(root, "missing.raw"), "raw", os.path.join(root, "o2"), width=64, height=48)
    raise AssertionError("missing input accepted")
except kf.KeyframeError as e:
    assert e.args[1] == 3
"#
    ));
}
