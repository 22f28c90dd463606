fn main() {
    std::process::exit(cooproute::run::run_from(std::env::args_os()));
}
