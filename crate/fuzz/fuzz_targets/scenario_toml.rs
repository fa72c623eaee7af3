#![no_main]

use cavity_trio::config::Scenario;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(scenario) = Scenario::from_toml_str(text) else {
        return;
    };
    let echoed = toml::to_string(&scenario.doc).expect("accepted documents serialize");
    let again = Scenario::from_toml_str(&echoed).expect("echoed documents parse");
    assert_eq!(again.doc, scenario.doc);
});
