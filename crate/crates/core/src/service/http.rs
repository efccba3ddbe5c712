//! HTTP transport for [`Service`]. See [`super::wire`] for the mapping.

use std::net::{SocketAddr, TcpListener};
use std::sync::Arc;
use std::thread::JoinHandle;

use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::oneshot;

use super::wire::*;
use super::{AccountId, Listing, Oracle, Reply, Service, ServiceError};
use crate::error::{Error, Result};
use crate::graph::{GroupId, PageId, PictureId, UserId};

type Shared = State<Arc<Service>>;

fn account(headers: &HeaderMap) -> std::result::Result<AccountId, Response> {
    headers
        .get(ACCOUNT_HEADER)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.trim().parse::<u32>().ok())
        .map(AccountId)
        .ok_or_else(|| {
            (
                StatusCode::BAD_REQUEST,
                Json(FailureBody {
                    error: Some("missing or invalid X-Account-Id header".into()),
                    ..Default::default()
                }),
            )
                .into_response()
        })
}

fn failure(err: ServiceError) -> (StatusCode, FailureBody) {
    match err {
        ServiceError::NotFound => (
            StatusCode::NOT_FOUND,
            FailureBody {
                error: Some("not found".into()),
                ..Default::default()
            },
        ),
        ServiceError::SelfQuery => (
            StatusCode::BAD_REQUEST,
            FailureBody {
                error: Some("self query".into()),
                ..Default::default()
            },
        ),
        ServiceError::AccessDenied => (
            StatusCode::FORBIDDEN,
            FailureBody {
                denied: true,
                ..Default::default()
            },
        ),
        ServiceError::RateLimited => (
            StatusCode::TOO_MANY_REQUESTS,
            FailureBody {
                rate_limited: true,
                ..Default::default()
            },
        ),
    }
}

fn hidden() -> (StatusCode, FailureBody) {
    (
        StatusCode::FORBIDDEN,
        FailureBody {
            hidden: true,
            ..Default::default()
        },
    )
}

enum Body<T> {
    Ok(T),
    Fail(StatusCode, FailureBody),
}

fn stamped<T: Serialize>(reply: Reply<()>, body: Body<T>) -> Response {
    let mut resp = match body {
        Body::Ok(t) => (StatusCode::OK, Json(t)).into_response(),
        Body::Fail(code, f) => (code, Json(f)).into_response(),
    };
    let h = resp.headers_mut();
    h.insert(SEQ_HEADER, HeaderValue::from(reply.stamp.seq));
    h.insert(TIME_HEADER, HeaderValue::from(reply.stamp.time_ms));
    h.insert(ACCOUNT_HEADER, HeaderValue::from(reply.stamp.account.0));
    resp
}

/// Splits a reply into its stamp and a response body.
fn render<T, B: Serialize>(reply: Reply<T>, f: impl FnOnce(T) -> Body<B>) -> Response {
    let stamp = Reply {
        stamp: reply.stamp,
        outcome: Ok(()),
    };
    let body = match reply.outcome {
        Ok(t) => f(t),
        Err(e) => {
            let (code, b) = failure(e);
            Body::Fail(code, b)
        }
    };
    stamped(stamp, body)
}

fn listing<T, B>(l: Listing<T>, f: impl FnOnce(T) -> B) -> Body<B> {
    match l {
        Listing::Visible(t) => Body::Ok(f(t)),
        Listing::Hidden => {
            let (code, b) = hidden();
            Body::Fail(code, b)
        }
    }
}

macro_rules! call {
    ($headers:expr, $expr:expr) => {{
        let acct = match account(&$headers) {
            Ok(a) => a,
            Err(resp) => return resp,
        };
        // the in-process service never fails at transport level
        $expr(acct).expect("in-process oracle")
    }};
}

async fn likes(State(s): Shared, headers: HeaderMap, Path(id): Path<u32>) -> Response {
    let reply = call!(headers, |a| s.liked_pages(a, UserId(id)));
    render(reply, |l| listing(l, |pages| PagesBody { pages }))
}

async fn pictures(State(s): Shared, headers: HeaderMap, Path(id): Path<u32>) -> Response {
    let reply = call!(headers, |a| s.public_pictures(a, UserId(id)));
    render(reply, |pictures| Body::Ok(PicturesBody { pictures }))
}

async fn groups(State(s): Shared, headers: HeaderMap, Path(id): Path<u32>) -> Response {
    let reply = call!(headers, |a| s.groups(a, UserId(id)));
    render(reply, |l| listing(l, |groups| GroupsBody { groups }))
}

#[derive(Deserialize)]
struct SeedQuery {
    #[serde(default)]
    seed: u64,
}

async fn facepile(
    State(s): Shared,
    headers: HeaderMap,
    Path(id): Path<u32>,
    Query(q): Query<SeedQuery>,
) -> Response {
    let reply = call!(headers, |a| s.facepile(a, PageId(id), q.seed));
    render(reply, |f| {
        Body::Ok(FacepileBody {
            fans: f.sampled_fans,
            total: f.total_fan_count,
        })
    })
}

async fn mutual(State(s): Shared, headers: HeaderMap, Path((a, b)): Path<(u32, u32)>) -> Response {
    let reply = call!(headers, |acct| s.mutual_content(acct, UserId(a), UserId(b)));
    render(reply, |m| {
        Body::Ok(MutualBody {
            are_friends: m.are_friends,
            since: m.friends_since,
            mutual_friends: m.mutual_friends,
        })
    })
}

async fn reactions(State(s): Shared, headers: HeaderMap, Path(id): Path<u32>) -> Response {
    let reply = call!(headers, |a| s.picture_reactions(a, PictureId(id)));
    render(reply, |r| {
        Body::Ok(ReactionsBody {
            likers: r.likers,
            commenters: r.commenters,
        })
    })
}

#[derive(Deserialize)]
struct PageQuery {
    #[serde(default)]
    page: u32,
}

async fn members(
    State(s): Shared,
    headers: HeaderMap,
    Path(id): Path<u32>,
    Query(q): Query<PageQuery>,
) -> Response {
    let reply = call!(headers, |a| s.group_members(a, GroupId(id), q.page));
    render(reply, |m| {
        Body::Ok(MembersBody {
            members: m.members,
            total: m.total,
            has_more: m.has_more,
        })
    })
}

pub fn router(service: Arc<Service>) -> Router {
    Router::new()
        .route("/user/{id}/likes", get(likes))
        .route("/user/{id}/pictures", get(pictures))
        .route("/user/{id}/groups", get(groups))
        .route("/page/{id}/facepile", get(facepile))
        .route("/mutual/{a}/{b}", get(mutual))
        .route("/picture/{id}/reactions", get(reactions))
        .route("/group/{id}/members", get(members))
        .with_state(service)
}

/// A server running on its own thread. Dropping the handle stops it.
pub struct ServerHandle {
    addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<Result<()>>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn shutdown(mut self) -> Result<()> {
        self.stop()
    }

    fn stop(&mut self) -> Result<()> {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        match self.thread.take() {
            Some(t) => t
                .join()
                .map_err(|_| Error::Server("server thread panicked".into()))?,
            None => Ok(()),
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        let _ = self.stop();
    }
}

fn bind(addr: SocketAddr) -> Result<TcpListener> {
    let listener =
        TcpListener::bind(addr).map_err(|e| Error::Server(format!("cannot bind {addr}: {e}")))?;
    listener.set_nonblocking(true)?;
    Ok(listener)
}

async fn run(
    service: Arc<Service>,
    listener: TcpListener,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> Result<()> {
    let listener = tokio::net::TcpListener::from_std(listener)?;
    axum::serve(listener, router(service))
        .with_graceful_shutdown(shutdown)
        .await?;
    Ok(())
}

fn runtime() -> Result<tokio::runtime::Runtime> {
    Ok(tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .enable_all()
        .build()?)
}

/// Binds `addr` (port 0 picks a free port) and serves on a background
/// thread. Binding errors are reported before this returns.
pub fn spawn_http_server(service: Arc<Service>, addr: SocketAddr) -> Result<ServerHandle> {
    let listener = bind(addr)?;
    let addr = listener.local_addr()?;
    let (tx, rx) = oneshot::channel::<()>();
    let thread = std::thread::Builder::new()
        .name(format!("oracle-http-{}", addr.port()))
        .spawn(move || {
            runtime()?.block_on(run(service, listener, async {
                let _ = rx.await;
            }))
        })?;
    Ok(ServerHandle {
        addr,
        shutdown: Some(tx),
        thread: Some(thread),
    })
}

/// Serves on the current thread until Ctrl-C / SIGTERM.
pub fn serve_until_signal(
    service: Arc<Service>,
    addr: SocketAddr,
    on_ready: impl FnOnce(SocketAddr),
) -> Result<()> {
    let listener = bind(addr)?;
    let local = listener.local_addr()?;
    runtime()?.block_on(async move {
        // Handlers go in before the address is announced, so a signal sent
        // right after the banner still shuts down cleanly.
        let shutdown = shutdown_signal()?;
        on_ready(local);
        run(service, listener, shutdown).await
    })
}

#[cfg(unix)]
fn shutdown_signal() -> Result<impl std::future::Future<Output = ()>> {
    use tokio::signal::unix::{signal, SignalKind};
    let mut int = signal(SignalKind::interrupt())?;
    let mut term = signal(SignalKind::terminate())?;
    Ok(async move {
        tokio::select! {
            _ = int.recv() => {},
            _ = term.recv() => {},
        }
    })
}

#[cfg(not(unix))]
fn shutdown_signal() -> Result<impl std::future::Future<Output = ()>> {
    Ok(async {
        let _ = tokio::signal::ctrl_c().await;
    })
}
