fn main() {
    std::process::exit(crncalc::cli::run(std::env::args_os()));
}
