fn main() {
    std::process::exit(physdepth::cli::main());
}
