use starmsa::engine::memory::TrackingAllocator;

#[global_allocator]
static ALLOC: TrackingAllocator = TrackingAllocator;

fn main() {
    std::process::exit(starmsa_cli::run(std::env::args_os()));
}
