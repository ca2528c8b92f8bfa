use std::env;
use std::path::PathBuf;

fn main() {
    let crate_dir = PathBuf::from(env::var("CARGO_MANIFEST_DIR").expect("set by cargo"));
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");

    let config = cbindgen::Config::from_file(crate_dir.join("cbindgen.toml")).expect("cbindgen.toml parses");
    let bindings = cbindgen::generate_with_config(&crate_dir, config).expect("header generation");
    // Only touch the checked-in header when it changes, so builds of an
    // unchanged tree leave the source directory alone.
    bindings.write_to_file(crate_dir.join("include").join("stt.h"));
}
