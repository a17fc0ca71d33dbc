//! Helpers for driving a live server over HTTP.

#![allow(dead_code)]

use std::path::Path;
use std::time::Duration;

use pimp_core::{HotspotPatch, Project, Rect, ScreenId};
use pimp_service::{serve, Config, RunningServer};
use rand::seq::IndexedRandom;
use rand::Rng;
use serde_json::{json, Value};

pub async fn start(data_dir: &Path) -> RunningServer {
    start_with(Config {
        port: 0,
        data_dir: data_dir.to_owned(),
        ..Config::default()
    })
    .await
}

pub async fn start_with(config: Config) -> RunningServer {
    serve(config).await.expect("server starts")
}

pub struct Api {
    pub base: String,
    pub client: reqwest::Client,
}

impl Api {
    pub fn new(server: &RunningServer) -> Self {
        Self {
            base: format!("http://{}", server.local_addr()),
            client: reqwest::Client::builder()
                .timeout(Duration::from_secs(30))
                .build()
                .unwrap(),
        }
    }

    pub async fn send(
        &self,
        method: reqwest::Method,
        path: &str,
        body: Option<Value>,
    ) -> (u16, Value) {
        let mut req = self.client.request(method, format!("{}{path}", self.base));
        if let Some(body) = body {
            req = req.json(&body);
        }
        let res = req.send().await.expect("request reaches server");
        let status = res.status().as_u16();
        let bytes = res.bytes().await.unwrap();
        let value = serde_json::from_slice(&bytes)
            .unwrap_or(Value::String(String::from_utf8_lossy(&bytes).into()));
        (status, value)
    }

    pub async fn raw(&self, method: reqwest::Method, path: &str) -> (u16, Vec<u8>) {
        let res = self
            .client
            .request(method, format!("{}{path}", self.base))
            .send()
            .await
            .unwrap();
        (res.status().as_u16(), res.bytes().await.unwrap().to_vec())
    }

    pub async fn get(&self, path: &str) -> (u16, Value) {
        self.send(reqwest::Method::GET, path, None).await
    }

    pub async fn post(&self, path: &str, body: Value) -> (u16, Value) {
        self.send(reqwest::Method::POST, path, Some(body)).await
    }

    pub async fn patch(&self, path: &str, body: Value) -> (u16, Value) {
        self.send(reqwest::Method::PATCH, path, Some(body)).await
    }

    pub async fn delete(&self, path: &str) -> (u16, Value) {
        self.send(reqwest::Method::DELETE, path, None).await
    }

    /// Creates a project and returns its id.
    pub async fn project(&self, name: &str) -> String {
        let (status, p) = self.post("/projects", json!({ "name": name })).await;
        assert_eq!(status, 201, "{p}");
        p["id"].as_str().unwrap().to_owned()
    }

    pub async fn screen(&self, project: &str, name: &str) -> String {
        let (status, s) = self
            .post(
                &format!("/projects/{project}/screens"),
                json!({ "name": name }),
            )
            .await;
        assert_eq!(status, 201, "{s}");
        s["id"].as_str().unwrap().to_owned()
    }

    pub async fn hotspot(
        &self,
        project: &str,
        screen: &str,
        rect: [f64; 4],
        link: Option<&str>,
    ) -> String {
        let (status, h) = self
            .post(
                &format!("/projects/{project}/screens/{screen}/hotspots"),
                json!({ "rect": { "x": rect[0], "y": rect[1], "w": rect[2], "h": rect[3] } }),
            )
            .await;
        assert_eq!(status, 201, "{h}");
        let id = h["id"].as_str().unwrap().to_owned();
        if let Some(target) = link {
            let (status, h) = self
                .patch(
                    &format!("/projects/{project}/screens/{screen}/hotspots/{id}"),
                    json!({ "link_target": target }),
                )
                .await;
            assert_eq!(status, 200, "{h}");
        }
        id
    }
}

/// Two screens, two hotspots on the first both linking to the second, then
/// convert. Returns the converted PIM's transitions.
pub async fn merged_fixture(api: &Api) -> Vec<Value> {
    let p = api.project("merged").await;
    let home = api.screen(&p, "Home").await;
    let settings = api.screen(&p, "Settings").await;
    api.hotspot(&p, &home, [0.1, 0.1, 0.2, 0.1], Some(&settings))
        .await;
    api.hotspot(&p, &home, [0.5, 0.5, 0.2, 0.1], Some(&settings))
        .await;
    let (status, report) = api
        .post(&format!("/projects/{p}/convert"), json!(null))
        .await;
    assert_eq!(status, 200, "{report}");
    report["pim"]["transitions"].as_array().unwrap().clone()
}

fn random_change(rng: &mut impl Rng, screens: &[String]) -> Value {
    let mut body = serde_json::Map::new();
    if rng.random_bool(0.6) {
        body.insert(
            "name".into(),
            json!(format!("edit {}", rng.random_range(0..1000))),
        );
    }
    if rng.random_bool(0.6) {
        let x = rng.random_range(0.0..0.5);
        let y = rng.random_range(0.0..0.5);
        body.insert(
            "rect".into(),
            json!({ "x": x, "y": y, "w": 0.25, "h": 0.25 }),
        );
    }
    if rng.random_bool(0.6) {
        let target = if rng.random_bool(0.2) {
            Value::Null
        } else {
            json!(screens.choose(rng).unwrap())
        };
        body.insert("link_target".into(), target);
    }
    if body.is_empty() || rng.random_bool(0.3) {
        body.insert(
            "s_behaviours".into(),
            json!([format!("S_run{}", rng.random_range(0..10))]),
        );
    }
    Value::Object(body)
}

fn apply_locally(p: &mut Project, screen: &ScreenId, hotspot: &str, change: &Value) {
    let patch = HotspotPatch {
        name: change.get("name").map(|v| v.as_str().unwrap().to_owned()),
        rect: change
            .get("rect")
            .map(|v| serde_json::from_value::<Rect>(v.clone()).unwrap()),
        link_target: change
            .get("link_target")
            .map(|v| v.as_str().map(ScreenId::new)),
        s_behaviours: change
            .get("s_behaviours")
            .map(|v| serde_json::from_value(v.clone()).unwrap()),
    };
    p.update_hotspot(screen, &pimp_core::HotspotId::new(hotspot), patch)
        .unwrap();
}

/// Fires two random PATCHes at one hotspot concurrently and checks that both
/// succeed and the stored project equals one of the two serial outcomes.
pub async fn linearization_run(api: &Api, seed: u64) -> Result<(), String> {
    let mut rng = pimp_core::testkit::rng(seed);
    let p = api.project(&format!("lin {seed}")).await;
    let screens = vec![
        api.screen(&p, "A").await,
        api.screen(&p, "B").await,
        api.screen(&p, "C").await,
    ];
    let h = api
        .hotspot(&p, &screens[0], [0.0, 0.0, 0.2, 0.2], Some(&screens[1]))
        .await;
    let (_, before) = api.get(&format!("/projects/{p}")).await;
    let before: Project = serde_json::from_value(before).map_err(|e| e.to_string())?;

    let c1 = random_change(&mut rng, &screens);
    let c2 = random_change(&mut rng, &screens);
    let path = format!("/projects/{p}/screens/{}/hotspots/{h}", screens[0]);
    let (r1, r2) = tokio::join!(api.patch(&path, c1.clone()), api.patch(&path, c2.clone()));
    if r1.0 != 200 || r2.0 != 200 {
        return Err(format!(
            "seed {seed}: statuses {} {} ({} / {})",
            r1.0, r2.0, r1.1, r2.1
        ));
    }

    let (_, after) = api.get(&format!("/projects/{p}")).await;
    let after: Project = serde_json::from_value(after).map_err(|e| e.to_string())?;
    let screen = ScreenId::new(&screens[0]);
    let serial = |first: &Value, second: &Value| {
        let mut q = before.clone();
        apply_locally(&mut q, &screen, &h, first);
        apply_locally(&mut q, &screen, &h, second);
        q
    };
    let (one_two, two_one) = (serial(&c1, &c2), serial(&c2, &c1));
    if after != one_two && after != two_one {
        return Err(format!(
            "seed {seed}: final state matches neither serial order"
        ));
    }
    let (_, deleted) = api.delete(&format!("/projects/{p}")).await;
    if deleted["deleted"] != json!(p) {
        return Err(format!("seed {seed}: cleanup failed: {deleted}"));
    }
    Ok(())
}
