import { buildApp } from './app.js';
import { loadConfig } from './config.js';

const config = loadConfig();
const app = buildApp(config);
app.listen(config.port, () => {
  console.log(
    `model adapter listening on :${config.port} ` +
      `(inpaint=${config.inpaintModel}, detect=${config.detectors[0]}, device=${config.device})`,
  );
});
