import { bootstrap } from "./viewer.js";

const canvas = document.getElementById("viewer") as HTMLCanvasElement;
const toggle = document.getElementById("method-toggle") as HTMLButtonElement;
const rating = document.getElementById("rating") as HTMLSelectElement;

bootstrap(canvas, "").then((viewer) => {
  toggle.addEventListener("click", () => {
    toggle.textContent = `method: ${viewer.toggleMethod()}`;
  });
  rating.addEventListener("change", () => {
    const score = Number(rating.value);
    if (score >= 1 && score <= 7) void viewer.rate(score);
  });
}).catch((err) => {
  document.body.append(`failed to start viewer: ${err}`);
});
