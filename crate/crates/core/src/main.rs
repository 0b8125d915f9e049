fn main() {
    std::process::exit(mildsolve::cli::run_from_env());
}
