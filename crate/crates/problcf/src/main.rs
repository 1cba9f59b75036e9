fn main() {
    std::process::exit(problcf::cli::run());
}
