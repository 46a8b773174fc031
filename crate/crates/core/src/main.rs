fn main() {
    std::process::exit(ria_core::cli::main_with_env());
}
