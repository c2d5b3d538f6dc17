fn main() {
    std::process::exit(schema_annotator::cli::run(std::env::args_os()));
}
