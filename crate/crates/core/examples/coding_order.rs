//! Print the multi-stage coding order and the context template of a few
//! positions on a small grid.
//!
//! ```text
//! cargo run --example coding_order -- [rows] [cols] [window]
//! ```

use uigc::token_core::{coding_order, context_positions, group_of, ContextSlot};

fn main() -> anyhow::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).map(|s| s.parse()).collect::<Result<_, _>>()?;
    let (rows, cols, window) = match args.as_slice() {
        [r, c, s] => (*r, *c, *s),
        [r, c] => (*r, *c, 4),
        _ => (6, 8, 4),
    };
    let order = coding_order(rows, cols, window)?;

    let mut rank = vec![0usize; rows * cols];
    for (i, (entry, _)) in order.iter().enumerate() {
        rank[entry.pos.row * cols + entry.pos.col] = i;
    }
    println!("coding rank ({rows}x{cols}, {window}x{window} windows):");
    for r in 0..rows {
        let line: Vec<String> = (0..cols).map(|c| format!("{:>3}", rank[r * cols + c])).collect();
        println!("{}", line.join(""));
    }
    println!("group per position:");
    for r in 0..rows {
        let line: Vec<String> = (0..cols).map(|c| format!("{:>3}", group_of(r, c).value())).collect();
        println!("{}", line.join(""));
    }

    for (entry, window) in order.iter().step_by(order.len().div_ceil(6).max(1)) {
        let slots: Vec<String> = context_positions(entry.pos, entry.stage, window)
            .into_iter()
            .map(|s| match s {
                ContextSlot::At(p) => format!("({},{})", p.row, p.col),
                ContextSlot::OutOfBounds => "oob".to_string(),
            })
            .collect();
        println!(
            "stage {} at ({},{}): context {}",
            entry.stage,
            entry.pos.row,
            entry.pos.col,
            slots.join(" ")
        );
    }
    Ok(())
}
