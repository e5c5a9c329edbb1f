//! Repetition codes over BSC(0.1): worst-message error equals the decoder's simulation
//! error, and falls with block length at rate 1/n.

use lecam::shannon::{bsc_capacity, lp_coding_deficiency, repetition_sweep, ChannelSpec, Codebook};

fn main() -> lecam::Result<()> {
    let p = 0.1;
    println!("capacity {:.4}", bsc_capacity(p));
    for row in repetition_sweep(p, &[1, 3, 5, 7, 9])? {
        let lp = if row.n <= 5 {
            format!("{:.6}", lp_coding_deficiency(&Codebook::repetition(row.n)?, &ChannelSpec::bsc(p, row.n)?)?)
        } else {
            "-".into()
        };
        println!("n = {}: rate {:.3}, Pe {:.6}, LP δ {lp}", row.n, row.rate, row.pe);
    }
    Ok(())
}
