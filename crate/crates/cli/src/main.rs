fn main() {
    std::process::exit(sparsecls_cli::run(std::env::args_os()));
}
