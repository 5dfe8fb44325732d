use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use triplet_watershed::data::{make_synthetic, save_dataset, SynthConfig};
use triplet_watershed::nn::{build_model, Architecture};
use triplet_watershed_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(tw_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

fn path_graph() -> *mut TwGraph {
    let us = [0usize, 1];
    let vs = [1usize, 2];
    let ws = [1.0, 3.0];
    let mut g = ptr::null_mut();
    let s = unsafe { tw_graph_new(3, us.as_ptr(), vs.as_ptr(), ws.as_ptr(), 2, &mut g) };
    assert_eq!(s, TwStatus::Ok);
    g
}

#[test]
fn watershed_and_pass_value() {
    let g = path_graph();
    unsafe {
        assert_eq!((tw_graph_n_vertices(g), tw_graph_n_edges(g)), (3, 2));
        let seeds = [0usize, 2];
        let classes = [0u32, 1];
        let mut labels = [7i64; 3];
        let s = tw_watershed(g, seeds.as_ptr(), classes.as_ptr(), 2, labels.as_mut_ptr());
        assert_eq!(s, TwStatus::Ok);
        assert_eq!(labels, [0, 0, 1]);

        let (mut v, mut disc) = (0.0, true);
        assert_eq!(tw_pass_value(g, 0, 2, &mut v, &mut disc), TwStatus::Ok);
        assert_eq!((v, disc), (3.0, false));

        let ws = [5.0, 2.0];
        assert_eq!(tw_graph_set_weights(g, ws.as_ptr(), 2), TwStatus::Ok);
        tw_watershed(g, seeds.as_ptr(), classes.as_ptr(), 2, labels.as_mut_ptr());
        assert_eq!(labels, [0, 1, 1]);
        tw_graph_free(g);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let us = [0usize];
        let vs = [0usize];
        let ws = [1.0];
        let mut g = ptr::null_mut();
        let s = tw_graph_new(2, us.as_ptr(), vs.as_ptr(), ws.as_ptr(), 1, &mut g);
        assert_eq!(s, TwStatus::InvalidGraph);
        assert!(g.is_null());
        assert!(!last_error().is_empty());

        let s = tw_graph_new(2, ptr::null(), vs.as_ptr(), ws.as_ptr(), 1, &mut g);
        assert_eq!(s, TwStatus::NullPointer);
        assert!(last_error().contains("us"));

        let g = path_graph();
        let mut labels = [0i64; 3];
        let s = tw_watershed(g, ptr::null(), ptr::null(), 0, labels.as_mut_ptr());
        assert_eq!(s, TwStatus::InvalidArgument);
        let (mut v, mut d) = (0.0, false);
        assert_eq!(tw_pass_value(g, 0, 9, &mut v, &mut d), TwStatus::InvalidGraph);
        tw_graph_free(g);
        tw_graph_free(ptr::null_mut());

        let missing = CString::new("/nonexistent/model.twnet").unwrap();
        let mut m = ptr::null_mut();
        assert_eq!(tw_model_load(missing.as_ptr(), &mut m), TwStatus::Io);
    }
}

#[test]
fn dataset_and_model_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let ds = make_synthetic(&SynthConfig {
        height: 6,
        width: 5,
        bands: 3,
        classes: 2,
        ..Default::default()
    })
    .unwrap();
    save_dataset(&ds, dir.path()).unwrap();
    let model = build_model(&Architecture::Mlp { hidden: vec![4] }, 3, 3, 2, 1).unwrap();
    let model_path = dir.path().join("m.twnet");
    model.save(&model_path, serde_json::json!({})).unwrap();

    unsafe {
        let cdir = CString::new(dir.path().to_str().unwrap()).unwrap();
        let mut h = ptr::null_mut();
        assert_eq!(tw_dataset_load(cdir.as_ptr(), &mut h), TwStatus::Ok);
        let (mut hh, mut ww, mut bb, mut cc) = (0, 0, 0, 0);
        assert_eq!(tw_dataset_dims(h, &mut hh, &mut ww, &mut bb, &mut cc), TwStatus::Ok);
        assert_eq!((hh, ww, bb, cc), (6, 5, 3, 2));
        let mut labels = vec![0u16; 30];
        assert_eq!(tw_dataset_labels(h, labels.as_mut_ptr(), 30), TwStatus::Ok);
        assert_eq!(labels, ds.labels());
        assert_eq!(tw_dataset_labels(h, labels.as_mut_ptr(), 29), TwStatus::InvalidArgument);
        tw_dataset_free(h);

        let cpath = CString::new(model_path.to_str().unwrap()).unwrap();
        let mut m = ptr::null_mut();
        assert_eq!(tw_model_load(cpath.as_ptr(), &mut m), TwStatus::Ok);
        assert_eq!(tw_model_input_len(m), 27);
        assert_eq!(tw_model_output_dim(m), 2);
        let input: Vec<f64> = (0..54).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut out = [0.0; 4];
        assert_eq!(tw_model_embed(m, input.as_ptr(), 2, out.as_mut_ptr()), TwStatus::Ok);
        let (loaded, _) = triplet_watershed::nn::Model::load(&model_path).unwrap();
        let expect = loaded
            .infer(&triplet_watershed::nn::Tensor::new(vec![2, 3, 3, 3], input).unwrap())
            .unwrap();
        assert_eq!(&out[..], expect.data());
        tw_model_free(m);
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(tw_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/triplet_watershed.h");
    let text = std::fs::read_to_string(&header).expect("header generated by build script");
    for f in ["tw_graph_new", "tw_watershed", "tw_pass_value", "tw_dataset_load", "tw_model_embed"] {
        assert!(text.contains(f), "{f} missing from header");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"triplet_watershed.h\"\nint main(void) { TwGraph *g = 0; return (int)tw_graph_n_vertices(g) + TW_STATUS_OK; }\n",
    )
    .unwrap();
    let Ok(status) = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-fsyntax-only")
        .arg("-I")
        .arg(header.parent().unwrap())
        .arg(&src)
        .status()
    else {
        eprintln!("no C compiler found; skipped the compile check");
        return;
    };
    assert!(status.success());
}
