//! Summed-area tables: constant-time rectangle sums.

use sureshrink::integral::IntegralImage;
use sureshrink::GrayImage;

fn main() -> sureshrink::Result<()> {
    let img = GrayImage::from_fn(6, 4, |r, c| (r * 6 + c) as f64)?;
    let table = IntegralImage::from_image(&img);

    for row in img.data().chunks(img.width()) {
        println!("{row:?}");
    }
    let s = table.rect_sum(1, 2, 3, 4)?;
    let direct: f64 = (1..=3).flat_map(|r| (2..=4).map(move |c| (r * 6 + c) as f64)).sum();
    println!("sum of rows 1..=3, cols 2..=4: {s} (direct loop: {direct})");
    println!("whole image: {}", table.rect_sum(0, 0, 3, 5)?);

    match table.rect_sum(0, 0, 4, 0) {
        Err(e) => println!("out of range: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
