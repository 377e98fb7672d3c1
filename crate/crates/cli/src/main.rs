fn main() {
    println!("radnet");
}
