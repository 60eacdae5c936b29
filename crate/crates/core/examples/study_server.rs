//! Serves a study over 12 placeholder images on 127.0.0.1:8080 until Ctrl-C.
//!
//! ```text
//! curl localhost:8080/session
//! curl 'localhost:8080/next?token=...'
//! curl -XPOST localhost:8080/vote -H 'content-type: application/json' \
//!      -d '{"token":"...","assignment_id":"a0001","slot":0}'
//! curl localhost:8080/results
//! ```

use thermal_sr::study::server::{serve, ServerState};
use thermal_sr::study::{default_roster, generate_assignments, Study};

#[tokio::main]
async fn main() -> thermal_sr::Result<()> {
    let images: Vec<String> = (0..12).map(|i| format!("img{i:02}")).collect();
    let roster = default_roster();
    let log = std::env::temp_dir().join("thermal_sr_ballots.tsv");
    let study = Study::new(
        roster.clone(),
        generate_assignments(&images, roster.len(), 0)?,
    )?
    .with_log(&log)?;
    println!("ballots are appended to {}", log.display());
    serve(
        "127.0.0.1:8080".parse().expect("address"),
        ServerState::new(study, None).shared(),
    )
    .await
}
