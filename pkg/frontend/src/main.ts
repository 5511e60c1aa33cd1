import { mountApp } from "./app.js";
import { WebSocketLike } from "./protocol.js";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");

const scheme = location.protocol === "https:" ? "wss" : "ws";
const socket = new WebSocket(`${scheme}://${location.host}/ws`) as unknown as WebSocketLike;

mountApp({ root, socket });
