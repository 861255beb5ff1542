//! Driving a protocol session in process, line by line.
//!
//! Shows the message flow a client sees, including error replies and a
//! batched step over two environments.
//!
//! cargo run --example protocol_in_process

use iab_uav_sim::protocol::Session;
use iab_uav_sim::ScenarioConfig;

fn main() -> iab_uav_sim::Result<()> {
    let cfg = ScenarioConfig::load(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/desk.toml"))?;
    let mut s = Session::new(cfg)?;
    let mut send = |req: &str| {
        let resp = s.handle_line(req);
        println!("> {req}");
        let shown: String = resp.chars().take(160).collect();
        println!("< {shown}{}", if resp.len() > 160 { " ..." } else { "" });
        serde_json::from_str::<serde_json::Value>(&resp).unwrap()
    };

    send(r#"{"type":"hello","id":"h"}"#);
    send(r#"{"type":"step","id":"too-early","short":[]}"#);
    send(r#"{"type":"batch","id":"r","requests":[{"type":"reset","seed":1},{"type":"reset","seed":2}]}"#);
    // slot 0 starts a block, so the step must carry velocities for both nodes
    send(r#"{"type":"step","id":"no-long","short":[{"scores":[]}]}"#);
    let batch = send(
        r#"{"type":"batch","id":"b","requests":[
            {"type":"step","short":[{"scores":[0,0,0,0,0,0]},{"scores":[0,0,0,0]},{"scores":[0,0,0,0]}],"long":[[10,0],[0,-10]]},
            {"type":"step","short":[{"mask":[false,false,false,false,false,false]},{"mask":[false,false,false,false]},{"mask":[false,false,false,false]}],"long":[[0,0],[0,0]]}
        ]}"#
        .replace('\n', " ")
        .as_str(),
    );
    for (i, r) in batch["responses"].as_array().unwrap().iter().enumerate() {
        println!("env {i}: type {} reward {}", r["type"], r["global_short_reward"]);
    }
    send(r#"{"type":"close"}"#);
    Ok(())
}
