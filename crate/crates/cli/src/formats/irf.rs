use std::io::Write;
use std::path::Path;

use tensor_art::irf::IrfSummary;
use tensor_art::Tensor;

use crate::atomic::write_atomic;
use crate::error::Result;

/// One row per method, horizon and response cell:
/// `method,h,i1,…,iN,response,q16,q84,q05,q95,significant`, with `response` the median.
pub fn write_irf_csv(path: &Path, summaries: &[IrfSummary]) -> Result<()> {
    write_atomic(path, |w| write_rows(w, summaries))
}

pub fn write_rows(w: &mut dyn Write, summaries: &[IrfSummary]) -> std::io::Result<()> {
    let n = summaries.first().map_or(0, |s| s.dims.len());
    let mut header = vec!["method".to_string(), "h".to_string()];
    header.extend((1..=n).map(|k| format!("i{k}")));
    header.extend(["response", "q16", "q84", "q05", "q95", "significant"].map(String::from));
    writeln!(w, "{}", header.join(","))?;
    for s in summaries {
        let shape = Tensor::zeros(&s.dims);
        for h in 0..s.median.len() {
            for i in 0..s.median[h].len() {
                write!(w, "{},{h}", s.method.as_str())?;
                for k in shape.multi_index(i) {
                    write!(w, ",{}", k + 1)?;
                }
                writeln!(
                    w,
                    ",{:?},{:?},{:?},{:?},{:?},{}",
                    s.median[h][i], s.q16[h][i], s.q84[h][i], s.q05[h][i], s.q95[h][i], s.significant[h][i]
                )?;
            }
        }
    }
    Ok(())
}
