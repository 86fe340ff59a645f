use std::time::Duration;

use lalaeval_core::campaign::{
    render_prompt, FetchError, ModelAccess, ModelUnderTest, ResponseFetcher, SampledQuestion,
};
use serde_json::{json, Value};

/// Environment variable holding the auth header value for a model:
/// `LALAEVAL_AUTH_` followed by the upper-cased model id with every
/// non-alphanumeric character replaced by `_`.
pub fn auth_env_var(model: &str) -> String {
    let tail: String =
        model.chars().map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_uppercase() } else { '_' }).collect();
    format!("LALAEVAL_AUTH_{tail}")
}

/// POSTs `{"model", "prompt"}` to the endpoint and reads the first of
/// `response`, `text`, `content` or `choices[0].message.content`; a
/// non-JSON body is taken verbatim.
pub struct HttpFetcher {
    agent: ureq::Agent,
}

impl HttpFetcher {
    pub fn new(timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder().timeout_global(Some(timeout)).build().into();
        Self { agent }
    }
}

fn extract(body: &str) -> String {
    let Ok(v) = serde_json::from_str::<Value>(body) else { return body.to_owned() };
    for key in ["response", "text", "content"] {
        if let Some(s) = v.get(key).and_then(Value::as_str) {
            return s.to_owned();
        }
    }
    if let Some(s) = v.pointer("/choices/0/message/content").and_then(Value::as_str) {
        return s.to_owned();
    }
    body.to_owned()
}

impl ResponseFetcher for HttpFetcher {
    fn fetch(&self, model: &ModelUnderTest, question: &SampledQuestion) -> Result<String, FetchError> {
        let ModelAccess::HttpEndpoint { base_uri, auth_header_name, prompt_template } = &model.access else {
            return Err(FetchError::NotAnEndpoint(model.id.to_string()));
        };
        let transport = |message: String| FetchError::Transport { model: model.id.to_string(), message };
        let mut req = self.agent.post(base_uri);
        if let Some(name) = auth_header_name {
            let var = auth_env_var(model.id.as_str());
            let value = std::env::var(&var).map_err(|_| transport(format!("{var} is not set")))?;
            req = req.header(name.as_str(), value);
        }
        let payload = json!({"model": model.id, "prompt": render_prompt(prompt_template, question)});
        let mut resp = req.send_json(&payload).map_err(|e| transport(e.to_string()))?;
        let body = resp.body_mut().read_to_string().map_err(|e| transport(e.to_string()))?;
        Ok(extract(&body))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn env_var_names() {
        assert_eq!(auth_env_var("gpt-4"), "LALAEVAL_AUTH_GPT_4");
    }

    #[test]
    fn extracts_common_shapes() {
        assert_eq!(extract(r#"{"response":"a"}"#), "a");
        assert_eq!(extract(r#"{"choices":[{"message":{"content":"b"}}]}"#), "b");
        assert_eq!(extract("plain"), "plain");
        assert_eq!(extract(r#"{"other":1}"#), r#"{"other":1}"#);
    }
}
