//! Regenerates include/gipsa.h from the extern "C" surface. The header is
//! committed so C consumers can build without the Rust toolchain; this script
//! only rewrites it when the interface actually changed.

use std::env;
use std::path::PathBuf;

fn main() {
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
    let crate_dir = PathBuf::from(env::var("CARGO_MANIFEST_DIR").expect("CARGO_MANIFEST_DIR"));
    let config = match cbindgen::Config::from_file(crate_dir.join("cbindgen.toml")) {
        Ok(c) => c,
        Err(e) => {
            println!("cargo:warning=cbindgen.toml unreadable, keeping committed header: {e}");
            return;
        }
    };
    match cbindgen::Builder::new()
        .with_crate(&crate_dir)
        .with_config(config)
        .generate()
    {
        Ok(bindings) => {
            bindings.write_to_file(crate_dir.join("include").join("gipsa.h"));
        }
        // A generation failure must not break `cargo build` for consumers who
        // only need the library; the committed header still describes the API.
        Err(e) => println!("cargo:warning=header generation skipped: {e}"),
    }
}
