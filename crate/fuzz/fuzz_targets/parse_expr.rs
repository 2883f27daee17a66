#![no_main]

use jetham_core::expr::parse;
use libfuzzer_sys::fuzz_target;

// First byte picks the dimension, the rest is the source text.
fuzz_target!(|data: &[u8]| {
    let Some((&dim, rest)) = data.split_first() else { return };
    let Ok(src) = std::str::from_utf8(rest) else { return };
    let n = usize::from(dim % 5);
    match parse(src, n) {
        Ok(e) => {
            let printed = e.to_string();
            let back = parse(&printed, n).expect("printed expression parses");
            assert_eq!(printed, back.to_string());
        }
        Err(err) => assert!(err.offset() <= src.len()),
    }
});
