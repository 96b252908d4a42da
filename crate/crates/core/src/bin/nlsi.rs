fn main() {
    std::process::exit(nlsi::cli::main());
}
