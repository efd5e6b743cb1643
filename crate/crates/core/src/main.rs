fn main() {
    env_logger::Builder::new()
        .filter_level(log::LevelFilter::Warn)
        .format_target(false)
        .init();
    std::process::exit(dataug_core::cli::parse_and_dispatch(std::env::args_os()));
}
