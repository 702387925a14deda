fn main() {
    std::process::exit(locdens::cli::main());
}
