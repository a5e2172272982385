//! Allen's interval relations between pairs of intervals.

use dbnkit::model::{allen_relation, AllenRelation, Interval};

fn main() -> dbnkit::Result<()> {
    let base = Interval::new(2.0, 5.0)?;
    let others = [
        (0.0, 1.0),
        (0.0, 2.0),
        (1.0, 3.0),
        (2.0, 4.0),
        (3.0, 4.0),
        (3.0, 5.0),
        (2.0, 5.0),
        (2.0, 7.0),
        (1.0, 6.0),
        (6.0, 8.0),
    ];
    for (s, e) in others {
        let y = Interval::new(s, e)?;
        let r = allen_relation(&base, &y);
        println!("[2,5] {:2} [{s},{e}]   inverse {}", r.symbol(), r.inverse());
    }
    println!("all relations: {:?}", AllenRelation::ALL.map(|r| r.symbol()));
    Ok(())
}
