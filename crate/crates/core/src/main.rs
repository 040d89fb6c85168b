fn main() {
    std::process::exit(oee_ca::cli::run(std::env::args_os()));
}
