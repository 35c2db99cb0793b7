// SPDX-License-Identifier: Apache-2.0

//! Width-exact values and module interfaces parsed from Verilog headers.
//!
//! cargo run --example bitvector

use tbgen::signal::{format_bitvector, parse_bitvector, parse_verilog_interface, BitVector};

const HEADER: &str = "
module top_module (
    input clk,
    input reset,
    input [7:0] d,
    input [69:0] wide,
    output reg [3:0] q
);
endmodule
";

fn main() -> tbgen::Result<()> {
    let v = parse_bitvector("1000", 4)?;
    println!("1000 -> value {:?}, bit3={} bit0={}", v.to_u64(), v.bit(3), v.bit(0));

    // strings are MSB first and must match the width exactly
    assert!(parse_bitvector("1000", 5).is_err());
    assert!(BitVector::from_u64(3, 8).is_err());

    let wide = parse_bitvector(&format!("1{}", "0".repeat(69)), 70)?;
    println!("70-bit limbs (LSW first): {:08x?}", wide.limbs32());
    println!("flip bit 0: {}", format_bitvector(&wide.with_bit_flipped(0)));

    let iface = parse_verilog_interface(HEADER)?;
    println!("\nmodule {}", iface.module_name());
    for p in iface.ports() {
        println!("  {:<6} {:?} width {:>2} clock={} reset={}", p.name, p.direction, p.width, p.is_clock, p.is_reset);
    }
    Ok(())
}
