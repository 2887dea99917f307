//! Offline stand-ins for the external endpoints, used by `--mock`.

use std::sync::Arc;

use guohua_core::client::mock::{HashEmbedder, PlaceholderImages, StaticOnline};
use guohua_core::client::{ClientError, ModelRequest, OnlineImage, TextModel};
use serde_json::json;

use crate::app::Clients;

/// Recognizes the workbench's prompts and answers with canned, well-formed
/// replies. Anything else is echoed.
#[derive(Debug, Default)]
pub struct DemoModel;

const SYMBOLS: [(&str, &str, &str, &str); 8] = [
    ("mountains", "Stability and endurance; the frame of every landscape.", "会当凌绝顶，一览众山小。", "Du Fu, Gazing at Mount Tai"),
    ("water", "Flowing water stands for purity and the passing of time.", "问渠那得清如许？为有源头活水来。", "Zhu Xi, Reflections on Reading"),
    ("auspicious clouds", "Good fortune and the meeting of heaven and earth.", "白云深处有人家。", "Du Mu, Mountain Walk"),
    ("birds", "Freedom and harmony between people and nature.", "千山鸟飞绝，万径人踪灭。", "Liu Zongyuan, River Snow"),
    ("deer", "Longevity and prosperity; the deer lives in untouched forests.", "呦呦鹿鸣，食野之苹。", "Book of Songs, Deer Cry"),
    ("pine", "Perseverance through the cold seasons.", "大雪压青松，青松挺且直。", "Chen Yi, Green Pine"),
    ("crane", "Immortality and a noble, unworldly spirit.", "晴空一鹤排云上，便引诗情到碧霄。", "Liu Yuxi, Autumn Song"),
    ("lotus", "Purity that rises unstained from the mud.", "出淤泥而不染，濯清涟而不妖。", "Zhou Dunyi, On the Love of the Lotus"),
];

fn selected_lines(prompt: &str) -> Vec<&str> {
    prompt
        .split("Selected tags:")
        .nth(1)
        .map(|rest| rest.lines().take_while(|l| l.starts_with("- ") || l.is_empty()).filter(|l| !l.is_empty()).collect())
        .unwrap_or_default()
}

impl TextModel for DemoModel {
    fn endpoint_id(&self) -> &str {
        "demo:text"
    }

    fn complete(&self, request: &ModelRequest) -> Result<String, ClientError> {
        let p = &request.prompt;
        let reply = if p.contains("Recommend") && p.contains("cultural symbols") {
            let items: Vec<_> = SYMBOLS
                .iter()
                .map(|(s, e, poem, src)| json!({"symbol": s, "explanation": e, "poem": poem, "poem_source": src}))
                .collect();
            serde_json::to_string(&items).expect("json")
        } else if p.contains("matching Chinese poems") {
            json!({"poem": "远看山有色，近听水无声。", "origin": "existing", "attribution": "Wang Wei, Painting"}).to_string()
        } else if p.contains("comprehensive design intention") {
            let tags: Vec<String> = selected_lines(p).iter().map(|l| l.trim_start_matches("- ").to_string()).collect();
            format!(
                "A vertical hanging-scroll composition in the Chinese manner, with generous blank space. {}",
                tags.join(". ")
            )
        } else if p.contains("style-related keywords") {
            json!({"style": ["freehand ink", "literati landscape"]}).to_string()
        } else if p.contains("Analyze the painting along") {
            json!({
                "cultural_symbol": [{"name": "pine", "description": "perseverance"}],
                "emotion": ["tranquility"],
                "composition": ["blank space"],
                "brushstroke": ["dry brush"],
                "color_tone": ["ink wash"]
            })
            .to_string()
        } else {
            p.clone()
        };
        Ok(reply)
    }
}

pub fn demo_clients() -> Clients {
    Clients {
        text: Arc::new(DemoModel),
        embedder: Arc::new(HashEmbedder::new(64)),
        images: Arc::new(PlaceholderImages::default()),
        online: Some(Arc::new(StaticOnline {
            results: vec![OnlineImage {
                image_url: "https://example.org/landscape.jpg".into(),
                title: "Landscape".into(),
                source_url: "https://example.org/".into(),
            }],
        })),
    }
}
