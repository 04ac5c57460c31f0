fn main() {
    // placeholder while the library is scaffolded
}
