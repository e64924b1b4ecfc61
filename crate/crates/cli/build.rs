fn main() {
    for (key, var) in [("TEXTSHIELD_TARGET", "TARGET"), ("TEXTSHIELD_PROFILE", "PROFILE")] {
        let value = std::env::var(var).unwrap_or_else(|_| "unknown".into());
        println!("cargo:rustc-env={key}={value}");
    }
}
