fn main() {
    std::process::exit(blowuplab::app::run(std::env::args_os()));
}
