fn main() {
    std::process::exit(salientcut::run(std::env::args_os()));
}
