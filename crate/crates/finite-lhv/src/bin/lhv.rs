fn main() {
    std::process::exit(finite_lhv::cli::run_from_env());
}
