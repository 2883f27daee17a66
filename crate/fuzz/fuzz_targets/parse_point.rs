#![no_main]

use jetham::parse_point;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Some((&dim, rest)) = data.split_first() else { return };
    let Ok(src) = std::str::from_utf8(rest) else { return };
    let n = usize::from(dim % 5);
    if let Ok(q) = parse_point(src, n) {
        assert_eq!(q.dim(), n);
        assert!(q.to_flat().iter().all(|v| v.is_finite()));
    }
});
