//! Queries over the fixture tables and generated data.

use medshare::datastore::{fixtures, gen_synthetic, match_query, ColumnDist, Query, Schema, SyntheticSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a = fixtures::hospital_a();
    for q in [
        Query::eq("diseasename", "Epistaxis"),
        Query::range("age", 40.0, 70.0).with_projection(["sno", "age"]),
        Query::any("zipcode"),
    ] {
        let hits = match_query(&a, &q)?;
        println!("{} -> {} rows", serde_json::to_string(&q)?, hits.len());
    }

    let spec = SyntheticSpec::hospital().with("age", ColumnDist::Gaussian { mean: 50.0, std_dev: 10.0 });
    let synth = gen_synthetic(500, 9, &Schema::hospital(), &spec)?;
    let older = match_query(&synth, &Query::range("age", 60.0, 200.0))?;
    println!("synthetic: {} of {} older than 60", older.len(), synth.len());
    print!("{}", String::from_utf8(synth.to_csv_bytes())?.lines().take(4).collect::<Vec<_>>().join("\n"));
    println!();
    Ok(())
}
