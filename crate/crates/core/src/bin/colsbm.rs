fn main() {
    std::process::exit(colsbm::commands::main());
}
