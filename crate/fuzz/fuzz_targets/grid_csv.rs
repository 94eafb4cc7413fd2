/*
Copyright 2026 The maobs Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#![no_main]

use std::sync::Arc;

use libfuzzer_sys::fuzz_target;
use maobs::grid::{build_grid, Domain, GridFunction};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let grid = Arc::new(build_grid(&Domain::rectangle([0.0, 0.0], [1.0, 1.0]), 0.25).unwrap());
    if let Ok(f) = GridFunction::from_csv(&grid, text) {
        let back = GridFunction::from_csv(&grid, &f.to_csv()).expect("written csv reparses");
        assert!(back.values().iter().zip(f.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }
});
