//! The HTTP and event-stream contract as an OpenAPI 3.1 document.

use serde_json::{json, Value};

fn error_ref(desc: &str) -> Value {
    json!({"description": desc, "content": {"application/json": {"schema": {"$ref": "#/components/schemas/Error"}}}})
}

fn ok_json(desc: &str, schema: Value) -> Value {
    json!({"description": desc, "content": {"application/json": {"schema": schema}}})
}

fn schema_ref(name: &str) -> Value {
    json!({"$ref": format!("#/components/schemas/{name}")})
}

fn id_param(name: &str, desc: &str) -> Value {
    json!({"name": name, "in": "path", "required": true, "schema": {"type": "string"}, "description": desc})
}

pub fn document() -> Value {
    let sid = id_param("id", "Session id.");
    let rid = id_param("rid", "Run id within the session.");
    json!({
        "openapi": "3.1.0",
        "info": {"title": "pathagent session service", "version": env!("CARGO_PKG_VERSION")},
        "security": [{"bearer": []}],
        "paths": {
            "/health": {"get": {
                "operationId": "health", "security": [],
                "responses": {"200": ok_json("Service is up.", json!({"type": "object"}))}
            }},
            "/openapi.json": {"get": {
                "operationId": "contract", "security": [],
                "responses": {"200": ok_json("This document.", json!({"type": "object"}))}
            }},
            "/sessions": {"post": {
                "operationId": "create_session",
                "requestBody": {"required": false, "content": {"application/json": {"schema": schema_ref("SessionOverrides")}}},
                "responses": {
                    "201": ok_json("Session created with a fresh working directory.", schema_ref("Session")),
                    "400": error_ref("InvalidRequest"),
                    "401": error_ref("Unauthorized")
                }
            }},
            "/sessions/{id}": {
                "get": {
                    "operationId": "get_session", "parameters": [sid],
                    "responses": {"200": ok_json("Session state.", schema_ref("Session")), "404": error_ref("UnknownSession")}
                },
                "delete": {
                    "operationId": "delete_session", "parameters": [sid],
                    "description": "Closes the session, cancels a running query between steps and archives the working directory.",
                    "responses": {"204": {"description": "Closed."}, "404": error_ref("UnknownSession")}
                }
            },
            "/sessions/{id}/queries": {"post": {
                "operationId": "post_query", "parameters": [sid],
                "requestBody": {"required": true, "content": {"application/json": {"schema": schema_ref("QueryRequest")}}},
                "responses": {
                    "202": ok_json("Query started on the session's retained memory.", schema_ref("QueryAccepted")),
                    "400": error_ref("InvalidRequest"),
                    "404": error_ref("UnknownSession"),
                    "409": error_ref("SessionBusy"),
                    "410": error_ref("SessionClosed")
                }
            }},
            "/sessions/{id}/runs/{rid}": {"get": {
                "operationId": "get_run", "parameters": [sid, rid],
                "responses": {"200": ok_json("Run state; summary is null while running.", schema_ref("RunInfo")), "404": error_ref("UnknownSession or UnknownRun")}
            }},
            "/sessions/{id}/runs/{rid}/stream": {"get": {
                "operationId": "stream_run",
                "parameters": [sid, rid,
                    {"name": "Last-Event-ID", "in": "header", "required": false, "schema": {"type": "integer"},
                     "description": "Resume after this event id."},
                    {"name": "last_event_id", "in": "query", "required": false, "schema": {"type": "integer"},
                     "description": "Same as the header, for clients that cannot set headers."}],
                "description": "Server-sent events. Past events are replayed, then new ones follow live. Each event carries an increasing integer id. The stream ends after the summary event.",
                "responses": {
                    "200": {"description": "Event stream.", "content": {"text/event-stream": {"schema": {"type": "string"}}}},
                    "404": error_ref("UnknownSession or UnknownRun")
                },
                "x-events": {"step": schema_ref("AgentStep"), "summary": schema_ref("AgentRun")}
            }},
            "/sessions/{id}/artifacts": {"get": {
                "operationId": "list_artifacts", "parameters": [sid],
                "responses": {
                    "200": ok_json("Files in the working directory, sorted by path.", json!({"type": "array", "items": schema_ref("Artifact")})),
                    "404": error_ref("UnknownSession"),
                    "410": error_ref("SessionClosed")
                }
            }},
            "/sessions/{id}/artifacts/{path}": {"get": {
                "operationId": "get_artifact",
                "parameters": [sid, {"name": "path", "in": "path", "required": true, "schema": {"type": "string"},
                    "description": "Slash-separated path relative to the working directory."}],
                "responses": {
                    "200": {"description": "File bytes; content type from the extension.",
                            "content": {"application/octet-stream": {"schema": {"type": "string", "format": "binary"}}}},
                    "400": error_ref("PathEscape"),
                    "404": error_ref("UnknownSession or NotFound"),
                    "410": error_ref("SessionClosed")
                }
            }},
            "/sessions/{id}/stop": {"post": {
                "operationId": "stop_session", "parameters": [sid],
                "description": "Cancels the running query before its next step. The run ends with terminated_by step_cap and cancelled true.",
                "responses": {
                    "202": ok_json("Whether a query was running.", json!({"type": "object", "properties": {"stopping": {"type": "boolean"}}, "required": ["stopping"]})),
                    "404": error_ref("UnknownSession"),
                    "410": error_ref("SessionClosed")
                }
            }}
        },
        "components": {
            "securitySchemes": {"bearer": {"type": "http", "scheme": "bearer"}},
            "schemas": {
                "Error": {"type": "object", "required": ["error", "message"], "properties": {
                    "error": {"type": "string", "enum": ["UnknownSession", "UnknownRun", "SessionBusy", "SessionClosed", "InvalidRequest", "PathEscape", "NotFound", "Unauthorized", "Internal"]},
                    "message": {"type": "string"}
                }},
                "SessionOverrides": {"type": "object", "additionalProperties": false, "properties": {
                    "max_steps": {"type": "integer", "minimum": 1},
                    "mode": {"type": "string", "enum": ["llm_only", "single_shot", "iterative", "with_tools"]},
                    "reset_memory_after_query": {"type": "boolean"},
                    "tool_categories": {"type": "array", "items": {"type": "string"}},
                    "special_instructions": {"type": "string"}
                }},
                "Session": {"type": "object", "required": ["id", "status", "created_at", "config", "memory_messages", "runs"], "properties": {
                    "id": {"type": "string"},
                    "status": {"type": "string", "enum": ["idle", "running", "closed"]},
                    "created_at": {"type": "integer", "description": "Seconds since the Unix epoch."},
                    "config": {"type": "object", "properties": {
                        "max_steps": {"type": "integer"},
                        "mode": {"type": "string"},
                        "reset_memory_after_query": {"type": "boolean"},
                        "tool_categories": {"type": ["array", "null"], "items": {"type": "string"}},
                        "observation_cap": {"type": "integer"}
                    }},
                    "memory_messages": {"type": "integer", "description": "Messages retained after the system prompt."},
                    "runs": {"type": "array", "items": {"type": "string"}}
                }},
                "QueryRequest": {"type": "object", "required": ["query"], "additionalProperties": false,
                    "properties": {"query": {"type": "string", "minLength": 1}}},
                "QueryAccepted": {"type": "object", "required": ["run_id", "status", "stream"], "properties": {
                    "run_id": {"type": "string"}, "status": {"type": "string", "const": "running"}, "stream": {"type": "string"}
                }},
                "RunInfo": {"type": "object", "required": ["id", "query", "status", "steps", "summary"], "properties": {
                    "id": {"type": "string"},
                    "query": {"type": "string"},
                    "status": {"type": "string", "enum": ["running", "finished"]},
                    "steps": {"type": "integer"},
                    "summary": {"oneOf": [schema_ref("AgentRun"), {"type": "null"}]}
                }},
                "AgentStep": {"type": "object",
                    "required": ["index", "thought", "code", "observation", "operations_used", "is_final", "duration"],
                    "properties": {
                        "index": {"type": "integer", "minimum": 1, "description": "Continues across queries of a session while memory is retained."},
                        "thought": {"type": "string"},
                        "code": {"type": "string"},
                        "observation": {"type": "string"},
                        "operations_used": {"type": "integer"},
                        "is_final": {"type": "boolean"},
                        "duration": {"type": "number", "description": "Seconds."}
                    }},
                "AgentRun": {"type": "object",
                    "required": ["query", "steps", "final_answer", "working_dir", "terminated_by", "total_duration", "cancelled", "time_budget_exceeded", "fatal_error"],
                    "properties": {
                        "query": {"type": "string"},
                        "steps": {"type": "array", "items": schema_ref("AgentStep")},
                        "final_answer": {"description": "Any JSON value, or null."},
                        "working_dir": {"type": "string", "description": "Always the placeholder {working_dir}."},
                        "terminated_by": {"type": "string", "enum": ["final_answer", "step_cap", "fatal_error"]},
                        "total_duration": {"type": "number"},
                        "cancelled": {"type": "boolean"},
                        "time_budget_exceeded": {"type": "boolean"},
                        "fatal_error": {"type": ["string", "null"]}
                    }},
                "Artifact": {"type": "object", "required": ["path", "size", "modified"], "properties": {
                    "path": {"type": "string"}, "size": {"type": "integer"},
                    "modified": {"type": "integer", "description": "Seconds since the Unix epoch."}
                }}
            }
        }
    })
}
