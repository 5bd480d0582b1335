//! Generates the C header from the public extern "C" surface at build
//! time, keeping `include/mcpm.h` in lockstep with the source.

fn main() {
    let crate_dir = std::env::var("CARGO_MANIFEST_DIR").expect("CARGO_MANIFEST_DIR");
    let header = std::path::Path::new(&crate_dir).join("include").join("mcpm.h");
    let config = cbindgen::Config::from_file(std::path::Path::new(&crate_dir).join("cbindgen.toml"))
        .expect("cbindgen.toml");
    cbindgen::Builder::new()
        .with_crate(&crate_dir)
        .with_config(config)
        .generate()
        .expect("header generation")
        .write_to_file(header);
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
}
