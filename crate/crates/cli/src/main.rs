fn main() {
    std::process::exit(tanaka::app::main_with(std::env::args_os()));
}
