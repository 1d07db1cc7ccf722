mod common;

use std::time::Duration;

use abm_serve::ServerConfig;
use common::{answers, last_snapshot, of_type, series, start};
use serde_json::{json, Value};

fn quick() -> ServerConfig {
    ServerConfig { grace: Duration::from_millis(300), ..ServerConfig::default() }
}

#[tokio::test]
async fn attach_describes_session() {
    let server = start(quick()).await;
    let s = server.session("schelling", json!({}), 1);
    let mut c = server.connect(&s.id).await;
    let hello = c.recv().await;
    assert_eq!(hello["type"], "session");
    assert_eq!(hello["id"], s.id.as_str());
    assert_eq!(hello["model"], "schelling");
    assert_eq!(hello["series"], json!(["happy", "avg. x"]));
    assert_eq!(hello["values"]["min_to_be_happy"], 3);
    assert_eq!(hello["step"], 0);
}

#[tokio::test]
async fn every_client_message_is_answered() {
    let server = start(quick()).await;
    let s = server.session("schelling", json!({}), 2);
    let mut c = server.connect(&s.id).await;
    c.recv().await;
    let script = [
        json!({"type": "subscribe"}),
        json!({"type": "step", "n": 2}),
        json!({"type": "play", "sps": 5}),
        json!({"type": "pause"}),
        json!({"type": "set_param", "name": "min_to_be_happy", "value": 4}),
        json!({"type": "reset"}),
        json!({"type": "clear_series"}),
    ];
    for msg in script {
        let kind = msg["type"].as_str().unwrap().to_string();
        let got = c.request(msg).await;
        let answer = got.last().unwrap();
        assert_ne!(answer["type"], "error", "{kind}: {answer}");
    }
    let errors = [
        (json!({"type": "set_param", "name": "min_to_be_happy", "value": 9}), "param_out_of_range"),
        (json!({"type": "set_param", "name": "min_to_be_happy", "value": "lots"}), "param_wrong_type"),
        (json!({"type": "set_param", "name": "nope", "value": 1}), "unknown_param"),
        (json!({"type": "play", "sps": 1e9}), "invalid_speed"),
        (json!({"type": "create", "model": "nosuchmodel"}), "unknown_model"),
    ];
    for (msg, code) in errors {
        let got = c.request(msg).await;
        assert_eq!(got.last().unwrap()["code"], code);
    }
    let got = c.request(json!({"type": "create", "model": "forestfire", "config": {"width": 20, "height": 10}, "seed": 4})).await;
    assert_eq!(of_type(&got, "session").next().unwrap()["model"], "forestfire");
    assert_eq!(got.last().unwrap()["type"], "ack");
    // Parameters now come from the forest fire model.
    let got = c.request(json!({"type": "set_param", "name": "density", "value": 2.0})).await;
    assert_eq!(got.last().unwrap()["code"], "param_out_of_range");

    c.send_raw("{not json".into()).await;
    let m = c.until(|m| m["type"] == "error").await;
    assert_eq!(m.last().unwrap()["code"], "invalid_message");
    c.send_raw(r#"{"type": "warp", "factor": 9}"#.into()).await;
    let m = c.until(|m| m["type"] == "error").await;
    assert_eq!(m.last().unwrap()["code"], "invalid_message");
}

#[tokio::test]
async fn set_param_to_current_value_changes_nothing() {
    let server = start(quick()).await;
    let a = server.session("schelling", json!({}), 5);
    let b = server.session("schelling", json!({}), 5);
    let mut ca = server.connect(&a.id).await;
    let mut cb = server.connect(&b.id).await;
    for c in [&mut ca, &mut cb] {
        c.recv().await;
        c.request(json!({"type": "subscribe"})).await;
    }
    let ack = ca.request(json!({"type": "set_param", "name": "min_to_be_happy", "value": 3})).await;
    assert_eq!(ack.last().unwrap(), &json!({"type": "param_ack", "name": "min_to_be_happy", "value": 3, "applies": "next_step"}));
    let sa = ca.request(json!({"type": "step", "n": 4})).await;
    let sb = cb.request(json!({"type": "step", "n": 4})).await;
    assert_eq!(series(&sa), series(&sb));
}

#[tokio::test]
async fn fixed_params_apply_on_reset() {
    let server = start(quick()).await;
    let s = server.session("schelling", json!({"width": 10, "height": 10}), 6);
    let mut c = server.connect(&s.id).await;
    c.recv().await;
    c.request(json!({"type": "subscribe"})).await;
    let ack = c.request(json!({"type": "set_param", "name": "density", "value": 0.5})).await;
    assert_eq!(ack.last().unwrap()["applies"], "on_reset");
    c.request(json!({"type": "step"})).await;
    c.drain(Duration::from_millis(100)).await;
    assert_eq!(last_snapshot(&c.log).unwrap()["agents"].as_array().unwrap().len(), 80);
    c.request(json!({"type": "reset"})).await;
    c.drain(Duration::from_millis(100)).await;
    assert_eq!(last_snapshot(&c.log).unwrap()["agents"].as_array().unwrap().len(), 50);
}

#[tokio::test]
async fn step_while_paused_is_exact() {
    let server = start(quick()).await;
    let s = server.session("schelling", json!({}), 7);
    let mut c = server.connect(&s.id).await;
    c.recv().await;
    let first = c.request(json!({"type": "subscribe"})).await;
    assert_eq!(series(&first), series(&first[..2]));
    let got = c.request(json!({"type": "step", "n": 5})).await;
    let pts = series(&got);
    assert_eq!(pts.len(), 10);
    assert_eq!(pts.iter().filter(|p| p.0 == "happy").map(|p| p.1).collect::<Vec<_>>(), [1, 2, 3, 4, 5]);
    c.drain(Duration::from_millis(100)).await;
    assert_eq!(last_snapshot(&c.log).unwrap()["step"], 5);
    assert!(c.drain(Duration::from_millis(200)).await.is_empty());
}

#[tokio::test]
async fn play_runs_at_the_requested_rate_and_pause_freezes() {
    let server = start(quick()).await;
    let s = server.session("schelling", json!({}), 8);
    let mut c = server.connect(&s.id).await;
    c.recv().await;
    c.request(json!({"type": "subscribe"})).await;
    let t0 = std::time::Instant::now();
    c.request(json!({"type": "play", "sps": 20})).await;
    tokio::time::sleep(Duration::from_millis(1000)).await;
    let got = c.request(json!({"type": "pause"})).await;
    let elapsed = t0.elapsed().as_secs_f64();
    let steps = series(&got).iter().filter(|p| p.0 == "happy").count() as f64;
    let expected = 20.0 * elapsed;
    assert!((steps - expected).abs() <= 2.0, "{steps} steps in {elapsed:.2}s");
    let after = c.drain(Duration::from_millis(400)).await;
    assert!(series(&after).is_empty());
    let snaps: Vec<u64> = of_type(&c.log, "snapshot").map(|m| m["step"].as_u64().unwrap()).collect();
    assert_eq!(*snaps.last().unwrap(), steps as u64);
    assert!(snaps.windows(2).all(|w| w[0] < w[1]));
}

#[tokio::test]
async fn resets_mark_the_series_and_series_continue() {
    let server = start(quick()).await;
    let s = server.session("schelling", json!({}), 9);
    let mut c = server.connect(&s.id).await;
    c.recv().await;
    c.request(json!({"type": "subscribe"})).await;
    c.request(json!({"type": "step", "n": 40})).await;
    let r1 = c.request(json!({"type": "reset"})).await;
    let r2 = c.request(json!({"type": "reset"})).await;
    let m1: Vec<&Value> = of_type(&r1, "reset_marker").collect();
    let m2: Vec<&Value> = of_type(&r2, "reset_marker").collect();
    assert_eq!(m1, [&json!({"type": "reset_marker", "step": 40})]);
    assert_eq!(m2, [&json!({"type": "reset_marker", "step": 41})]);
    assert_eq!(series(&r2).iter().map(|p| p.1).collect::<Vec<_>>(), [42, 42]);
    c.drain(Duration::from_millis(100)).await;
    assert_eq!(last_snapshot(&c.log).unwrap()["step"], 0);
    let got = c.request(json!({"type": "step", "n": 1})).await;
    assert_eq!(series(&got)[0].1, 43);
}

#[tokio::test]
async fn resubscribing_replays_history() {
    let server = start(quick()).await;
    let s = server.session("schelling", json!({}), 10);
    let mut c = server.connect(&s.id).await;
    c.recv().await;
    c.request(json!({"type": "subscribe"})).await;
    c.request(json!({"type": "step", "n": 6})).await;
    c.request(json!({"type": "reset"})).await;
    c.request(json!({"type": "step", "n": 3})).await;
    c.drain(Duration::from_millis(100)).await;
    let seen: Vec<Value> = c.log.iter().filter(|m| m["type"] == "series" || m["type"] == "reset_marker").cloned().collect();
    c.close().await;

    let mut again = server.connect(&s.id).await;
    let hello = again.recv().await;
    assert_eq!(hello["series_step"], 10);
    let got = again.request(json!({"type": "subscribe"})).await;
    let replayed: Vec<Value> = got.into_iter().filter(|m| m["type"] == "series" || m["type"] == "reset_marker").collect();
    assert_eq!(replayed, seen);

    again.request(json!({"type": "clear_series"})).await;
    again.request(json!({"type": "step", "n": 2})).await;
    again.close().await;
    let mut third = server.connect(&s.id).await;
    third.recv().await;
    let got = third.request(json!({"type": "subscribe"})).await;
    assert_eq!(series(&got).iter().map(|p| p.1).collect::<Vec<_>>(), [11, 11, 12, 12]);
}

#[tokio::test]
async fn a_new_socket_replaces_the_old_one() {
    let server = start(quick()).await;
    let s = server.session("schelling", json!({}), 11);
    let mut a = server.connect(&s.id).await;
    a.recv().await;
    let mut b = server.connect(&s.id).await;
    b.recv().await;
    assert!(a.drain(Duration::from_millis(200)).await.is_empty());
    let got = b.request(json!({"type": "step"})).await;
    assert_eq!(got.last().unwrap()["type"], "ack");
}

#[tokio::test]
async fn sessions_end_after_the_grace_period() {
    let server = start(quick()).await;
    let idle = server.session("schelling", json!({}), 12);
    let used = server.session("schelling", json!({}), 13);
    assert_eq!(server.state.session_count(), 2);
    let mut c = server.connect(&used.id).await;
    c.recv().await;
    tokio::time::sleep(Duration::from_millis(600)).await;
    assert_eq!(server.state.session_count(), 1, "{} never connected", idle.id);
    c.request(json!({"type": "step"})).await;
    c.close().await;
    tokio::time::sleep(Duration::from_millis(150)).await;
    assert_eq!(server.state.session_count(), 1);
    tokio::time::sleep(Duration::from_millis(450)).await;
    assert_eq!(server.state.session_count(), 0);
}

#[tokio::test]
async fn snapshots_carry_visuals_and_heat() {
    let server = start(quick()).await;
    let s = server.session("schelling", json!({"width": 6, "height": 5}), 14);
    let mut c = server.connect(&s.id).await;
    c.recv().await;
    c.request(json!({"type": "subscribe"})).await;
    c.drain(Duration::from_millis(100)).await;
    let snap = last_snapshot(&c.log).unwrap().clone();
    assert_eq!(snap["extent"], json!([6.0, 5.0]));
    assert!(snap.get("heat").is_none());
    let agents = snap["agents"].as_array().unwrap();
    assert_eq!(agents.len(), 24);
    for a in agents {
        let style = (a["color"].as_str().unwrap(), a["marker"].as_str().unwrap());
        assert!(style == ("#1f77b4", "circle") || style == ("#ff7f0e", "rect"), "{a}");
        let (x, y) = (a["x"].as_f64().unwrap(), a["y"].as_f64().unwrap());
        assert!(x > 0.0 && x < 6.0 && y > 0.0 && y < 5.0);
    }

    let w = server.session("wolfsheep", json!({}), 15);
    let mut c = server.connect(&w.id).await;
    c.recv().await;
    c.request(json!({"type": "subscribe"})).await;
    c.drain(Duration::from_millis(100)).await;
    let snap = last_snapshot(&c.log).unwrap();
    let heat = snap["heat"].as_array().unwrap();
    assert_eq!((heat.len(), heat[0].as_array().unwrap().len()), (25, 25));
    assert!(answers(&json!({"type": "ack", "of": "step"}), "step"));
}
