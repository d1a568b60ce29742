fn main() {
    pkg_config::Config::new()
        .probe("openblas")
        .expect("OpenBLAS with LAPACK symbols is required (install libopenblas-dev)");
}
