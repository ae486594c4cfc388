fn main() {
    std::process::exit(gazemouse_engine::cli::main_with(std::env::args()));
}
