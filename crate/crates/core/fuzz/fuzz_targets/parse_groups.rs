#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(groups) = grouplink::io::parse_groups(data) {
        let mut out = Vec::new();
        grouplink::io::write_groups(&mut out, groups.iter().map(|(g, m)| (g.as_str(), m.as_slice()))).unwrap();
        assert_eq!(grouplink::io::parse_groups(out.as_slice()).unwrap(), groups);
    }
    let _ = grouplink::io::parse_ground_truth(data, grouplink::model::GroupKind::Company);
});
