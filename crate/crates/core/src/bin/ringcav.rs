fn main() {
    std::process::exit(ringcav::cli::main_with_args(std::env::args_os()));
}
