fn main() {
    std::process::exit(stt_core::cli::run());
}
