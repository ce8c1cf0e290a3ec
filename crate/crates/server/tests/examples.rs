//! Runs every example end to end.

macro_rules! example {
    ($name:ident) => {
        mod $name {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", stringify!($name), ".rs"));
        }

        #[test]
        fn $name() {
            $name::main();
        }
    };
}

example!(rest_walkthrough);
example!(realtime_clients);
