fn main() {
    std::process::exit(tangent_monad::cli::main());
}
