// Copyright 2026 The dephase Authors
// SPDX-License-Identifier: Apache-2.0

fn main() -> std::process::ExitCode {
    dephase::cli::main()
}
