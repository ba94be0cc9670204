fn main() {
    std::process::exit(fieldwork::cli::run());
}
