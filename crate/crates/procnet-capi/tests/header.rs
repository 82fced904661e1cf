//! Keeps `include/procnet.h` in sync with the exported surface. Run with
//! `PROCNET_UPDATE_HEADER=1` to regenerate after an API change.

#[test]
fn generated_header_is_current() {
    let crate_dir = env!("CARGO_MANIFEST_DIR");
    let header_path = std::path::Path::new(crate_dir).join("include/procnet.h");
    let generated = cbindgen::Builder::new()
        .with_crate(crate_dir)
        .with_config(cbindgen::Config::from_root_or_default(crate_dir))
        .generate()
        .expect("cbindgen generation failed");
    let mut buf = Vec::new();
    generated.write(&mut buf);
    let fresh = String::from_utf8(buf).unwrap();

    if std::env::var_os("PROCNET_UPDATE_HEADER").is_some() {
        std::fs::write(&header_path, &fresh).unwrap();
        return;
    }
    let committed = std::fs::read_to_string(&header_path)
        .expect("include/procnet.h missing; regenerate with PROCNET_UPDATE_HEADER=1");
    assert_eq!(
        committed, fresh,
        "include/procnet.h is stale; regenerate with PROCNET_UPDATE_HEADER=1"
    );
}
