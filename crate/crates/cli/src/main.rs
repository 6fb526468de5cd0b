fn main() {
    std::process::exit(mhdlab::main_with_args(std::env::args_os()));
}
